"""Validates JSON documents against JSON Schemas: check_schema.py SCHEMA DOC [SCHEMA DOC ...]."""

import json
import sys

import jsonschema


def main(argv):
    if len(argv) < 2 or len(argv) % 2:
        print(__doc__, file=sys.stderr)
        return 64
    for schema_path, doc_path in zip(argv[::2], argv[1::2]):
        with open(schema_path) as f:
            schema = json.load(f)
        with open(doc_path) as f:
            doc = json.load(f)
        jsonschema.Draft202012Validator.check_schema(schema)
        errors = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(e.path))
        for e in errors:
            print(f"{doc_path}: {'/'.join(map(str, e.path)) or '<root>'}: {e.message}", file=sys.stderr)
        if errors:
            return 1
        print(f"{doc_path}: valid")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
