"""Validates report.json files against schema/report.schema.json."""
import json
import sys
from pathlib import Path

import jsonschema


def main(argv: list[str]) -> int:
    if len(argv) < 3:
        print("usage: validate_report.py SCHEMA REPORT...", file=sys.stderr)
        return 2
    schema = json.loads(Path(argv[1]).read_text())
    validator = jsonschema.Draft202012Validator(schema)
    bad = 0
    for name in argv[2:]:
        report = json.loads(Path(name).read_text())
        errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
        for e in errors:
            key = "/".join(str(p) for p in e.path) or "<root>"
            print(f"{name}: {key}: {e.message}", file=sys.stderr)
        bad += bool(errors)
        if not errors:
            print(f"{name}: ok")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
