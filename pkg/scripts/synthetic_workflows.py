"""Run the holdout / constraint-selection / iteration pipelines on the bundled datasets.

    python3 scripts/synthetic_workflows.py              # print summaries
    python3 scripts/synthetic_workflows.py --golden tests/golden   # refreeze golden files
"""

import argparse
import json
import time
from pathlib import Path

from exchmine.significance import format_contingency
from exchmine.workflows import run_preset


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--preset", choices=("toy", "planted"), action="append")
    parser.add_argument("--golden", help="directory to write workflow_<preset>.json into")
    args = parser.parse_args()
    for name in args.preset or ["toy", "planted"]:
        start = time.perf_counter()
        result = run_preset(name)
        elapsed = time.perf_counter() - start
        cmp_, loop = result["compare"], result["iterations"]
        print(f"== {name}: {cmp_['itemsets']} itemsets, rows {cmp_['rows']}, {elapsed:.1f}s")
        print("significant per null:", cmp_["significant"])
        for pair, table in cmp_["contingency"].items():
            a, b = pair.split("/")
            print(format_contingency(table, a, b))
        print("iteration significant counts:", loop["significant_counts"])
        print("constraints chosen:", loop["chosen"])
        if args.golden:
            path = Path(args.golden) / f"workflow_{name}.json"
            path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
            print("wrote", path)


if __name__ == "__main__":
    main()
