"""Download the LIBSVM binary-classification files used by the benchmarks.

    python scripts/fetch_datasets.py [--dest data] [--only mushrooms]
"""

import argparse
import sys
import urllib.request
from pathlib import Path

BASE = "https://www.csie.ntu.edu.tw/~cjlin/libsvmtools/datasets/binary/"
FILES = {
    "mushrooms": "mushrooms",
    "colon-cancer": "colon-cancer.bz2",
}


def fetch(name, dest: Path, timeout=60.0) -> Path:
    target = dest / FILES[name]
    if target.exists():
        print(f"{name}: already at {target}")
        return target
    url = BASE + FILES[name]
    print(f"{name}: downloading {url}")
    tmp = target.with_suffix(target.suffix + ".part")
    with urllib.request.urlopen(url, timeout=timeout) as resp, open(tmp, "wb") as fh:
        fh.write(resp.read())
    tmp.rename(target)
    return target


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--dest", default=Path(__file__).resolve().parents[1] / "data", type=Path)
    p.add_argument("--only", choices=sorted(FILES), action="append")
    args = p.parse_args(argv)
    args.dest.mkdir(parents=True, exist_ok=True)
    failed = 0
    for name in args.only or sorted(FILES):
        try:
            fetch(name, args.dest)
        except OSError as exc:
            print(f"{name}: failed ({exc})", file=sys.stderr)
            failed += 1
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
