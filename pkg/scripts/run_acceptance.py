"""Run the acceptance suite and write its PASS/FAIL lines to a summary file."""
import argparse
import re
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=ROOT / "acceptance_summary.txt")
    parser.add_argument("-k", dest="select", help="pytest -k expression")
    args = parser.parse_args()
    cmd = [sys.executable, "-m", "pytest", "-q", str(ROOT / "tests" / "test_acceptance.py")]
    if args.select:
        cmd += ["-k", args.select]
    proc = subprocess.run(cmd, capture_output=True, text=True, cwd=ROOT)
    lines = re.findall(r"(?:PASS|FAIL) .*", proc.stdout)
    args.out.write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"{sum(ln.startswith('FAIL') for ln in lines)} failing of {len(lines)} checks")
    return proc.returncode


if __name__ == "__main__":
    sys.exit(main())
