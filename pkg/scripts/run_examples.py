"""Run every config in scripts/configs through the CLI into one output tree."""
import argparse
import sys
from pathlib import Path

from esqpt.cli import main as esqpt

HERE = Path(__file__).resolve().parent
SUBCOMMAND = {"lipkin_density": "density", "dicke_semiclassics": "semiclassics",
              "lipkin_quench": "quench", "toy_thermo": "thermo",
              "double_barrier_tunnel": "tunnel", "chain_lattice": "lattice"}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("example_runs"))
    out = parser.parse_args().out
    status = 0
    for name, subcommand in SUBCOMMAND.items():
        code = esqpt([subcommand, "--config", str(HERE / "configs" / f"{name}.json"),
                      "--out", str(out / name)])
        print(f"{name}: {subcommand} exit {code}")
        status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
