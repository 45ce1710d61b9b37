//! Parsers for the compact textual forms accepted on the command line.

use nilprog::rational::{parse_rat, Rat};

use crate::error::CliError;

fn bad(what: &str, text: &str) -> CliError {
    CliError::Usage(format!("cannot parse {what} from {text:?}"))
}

/// `"3,-1,2"` (commas or spaces).
pub fn int_list(text: &str) -> Result<Vec<i64>, CliError> {
    text.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad("an integer list", text)))
        .collect()
}

pub fn u32_list(text: &str) -> Result<Vec<u32>, CliError> {
    text.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| t.trim().parse().map_err(|_| bad("a list of radii", text)))
        .collect()
}

/// `"1,-1/2,0"`.
pub fn rat_list(text: &str) -> Result<Vec<Rat>, CliError> {
    text.split([',', ' '])
        .filter(|t| !t.is_empty())
        .map(|t| rat(t.trim()))
        .collect()
}

pub fn rat(text: &str) -> Result<Rat, CliError> {
    parse_rat(text).map_err(|_| bad("a rational", text))
}

/// Columns separated by `;`, entries by `,`: `"1,0;1/2,1/2"`.
pub fn columns(text: &str) -> Result<Vec<Vec<Rat>>, CliError> {
    text.split(';')
        .map(str::trim)
        .filter(|c| !c.is_empty())
        .map(rat_list)
        .collect()
}

/// A word in the free generators: `"x2 x1^-1 x2^3"`. Tokens may also be
/// separated by `*` or `,`.
pub fn word(text: &str) -> Result<Vec<(usize, i64)>, CliError> {
    text.split([' ', '*', ','])
        .filter(|t| !t.is_empty())
        .map(|t| {
            let t = t.trim();
            let body = t.strip_prefix('x').ok_or_else(|| bad("a word", text))?;
            let (idx, exp) = match body.split_once('^') {
                Some((i, e)) => (i, e.trim_start_matches('(').trim_end_matches(')')),
                None => (body, "1"),
            };
            let i: usize = idx.parse().map_err(|_| bad("a generator index", t))?;
            let e: i64 = exp.parse().map_err(|_| bad("an exponent", t))?;
            if i == 0 {
                return Err(bad("a generator index (1-based)", t));
            }
            Ok((i, e))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nilprog::rational::{int, rat as mk};

    #[test]
    fn words() {
        assert_eq!(
            word("x2 x1^-1 x2^3").unwrap(),
            vec![(2, 1), (1, -1), (2, 3)]
        );
        assert_eq!(word("x1^(-2)*x3").unwrap(), vec![(1, -2), (3, 1)]);
        assert!(word("y1").is_err());
        assert!(word("x0").is_err());
        assert_eq!(word("").unwrap(), vec![]);
    }

    #[test]
    fn numbers() {
        assert_eq!(int_list("3,-1, 2").unwrap(), vec![3, -1, 2]);
        assert_eq!(rat_list("1,-1/2").unwrap(), vec![int(1), mk(-1, 2)]);
        assert_eq!(columns("1,0; 1/2,1/2").unwrap().len(), 2);
        assert!(rat_list("1/0").is_err());
        assert!(int_list("a").is_err());
    }
}
