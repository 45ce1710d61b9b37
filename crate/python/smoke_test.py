"""Quick check of the Python bindings.

Build first with `maturin develop -m crates/py/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import json
from pathlib import Path

import nilprog_py as nil

ROOT = Path(__file__).resolve().parent.parent


def main():
    basis = json.loads(nil.hall_basis(2, 3))
    assert basis["d"] == 5, basis["d"]

    assert nil.collect(2, 2, [(2, 1), (1, 1)]) == [1, 1, 1]
    assert nil.bch(2, 2, ["1", "0", "0"], ["0", "1", "0"]) == ["1", "1", "-1/2"]

    fixture = (ROOT / "crates" / "cli" / "examples" / "z2_to_z.json").read_text()
    res = json.loads(nil.properize(fixture))
    assert res["proper"]["proper"]
    assert len(res["P"]["gens"]) == 1

    rows = nil.grow("heisenberg", 5).strip().splitlines()
    assert rows[0] == "n,size,ratio,slope"
    assert rows[1].startswith("1,7,")

    try:
        nil.collect(2, 2, [(3, 1)])
    except ValueError:
        pass
    else:
        raise AssertionError("bad generator accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
