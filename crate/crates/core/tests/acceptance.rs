use std::path::PathBuf;

use nilprog::ledger::ConstantsLedger;
use nilprog::verify;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/constants.json")
}

fn main() {
    let mut ledger = ConstantsLedger::new();
    let ids: Vec<u8> = (1..=11).collect();
    let outcomes = verify::run_suite(&ids, &mut ledger);
    for o in &outcomes {
        println!("{}", o.line());
    }

    let path = golden_path();
    if std::env::var_os("NILPROG_BLESS").is_some() || !path.exists() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        ledger.save(&path).unwrap();
        println!("constants ledger written to {}", path.display());
    } else {
        let golden = ConstantsLedger::load(&path).unwrap();
        let diff = ledger.compare(&golden);
        for m in &diff {
            println!(
                "constant {} changed: expected {:?}, found {:?}",
                m.key, m.expected, m.found
            );
        }
        if !diff.is_empty() {
            eprintln!("constants ledger differs from golden file");
            std::process::exit(1);
        }
    }

    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
