#!/usr/bin/env python3
"""Run every JSON-producing CLI path and validate the output against the
shipped schemas. Usage: validate_schemas.py <patchforensics-binary> <schema-dir>
"""
import json
import math
import pathlib
import subprocess
import sys
import tempfile

import jsonschema
from referencing import Registry, Resource


def write_ppm(path: pathlib.Path, side: int = 128) -> None:
    """Deterministic patterned test image: gradient background, one disk,
    one rectangle. Binary P6 so no image library is needed."""
    rows = []
    for y in range(side):
        row = bytearray()
        for x in range(side):
            r = int(40 + 170 * x / side)
            g = int(200 - 140 * y / side)
            b = int(90 + 100 * math.sin(x / 9.0) * math.cos(y / 11.0) / 2 + 50)
            if (x - 40) ** 2 + (y - 48) ** 2 < 400:
                r, g, b = 230, 60, 60
            if 70 <= x < 110 and 76 <= y < 104:
                r, g, b = 30, 40, 190
            row += bytes((max(0, min(255, v)) for v in (r, g, b)))
        rows.append(bytes(row))
    with open(path, "wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (side, side))
        f.writelines(rows)


def run(cli, args, ok_codes, cwd):
    proc = subprocess.run([cli] + args, capture_output=True, text=True, cwd=cwd)
    if proc.returncode not in ok_codes:
        sys.exit(
            f"FAIL: {' '.join(args)} exited {proc.returncode}\n{proc.stdout}{proc.stderr}"
        )
    return proc.stdout


def main() -> int:
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    cli = str(pathlib.Path(sys.argv[1]).resolve())
    schema_dir = pathlib.Path(sys.argv[2]).resolve()

    schemas = {}
    registry = Registry()
    for path in sorted(schema_dir.glob("*.schema.json")):
        doc = json.loads(path.read_text())
        schemas[path.name] = doc
        registry = registry.with_resource(doc["$id"], Resource.from_contents(doc))

    def validate(name, instance, source):
        jsonschema.validate(instance, schemas[name], registry=registry)
        print(f"ok: {source} conforms to {name}")

    with tempfile.TemporaryDirectory(prefix="pf_schema_") as td:
        tmp = pathlib.Path(td)
        base = tmp / "base.ppm"
        write_ppm(base)

        # forge -> provenance.json
        run(cli, ["--quiet", "--seed", "9", "forge", str(base), "--size", "40",
                  "--pos-x", "20", "--pos-y", "30", "--output-dir", str(tmp / "fo")],
            {0}, td)
        validate("provenance.schema.json",
                 json.loads((tmp / "fo" / "provenance.json").read_text()),
                 "forge provenance.json")

        forged = tmp / "fo" / "forged.png"

        # compare -> stdout JSON
        out = run(cli, ["compare", str(base), str(forged)], {0}, td)
        validate("hash_comparison.schema.json", json.loads(out), "compare stdout")

        # detect -> report.json (exit 1 expected: the pair is tampered)
        run(cli, ["--quiet", "detect", str(base), str(forged), "--overlay", "--bars",
                  "--output-dir", str(tmp / "det")], {0, 1}, td)
        validate("detection_report.schema.json",
                 json.loads((tmp / "det" / "report.json").read_text()),
                 "detect report.json")

        # sweep -> sweep.json
        corpus = tmp / "corpus"
        corpus.mkdir()
        write_ppm(corpus / "a.ppm")
        grid = tmp / "grid.json"
        grid.write_text('{"epsilon": [0.05, 0.2], "size": [24], "position": [[8, 8]]}')
        run(cli, ["--quiet", "--seed", "3", "sweep", str(corpus), "--grid", str(grid),
                  "--output-dir", str(tmp / "sw")], {0}, td)
        validate("sweep_report.schema.json",
                 json.loads((tmp / "sw" / "sweep.json").read_text()),
                 "sweep sweep.json")

        # batch -> corpus_report.json, including a failed row
        manifest = tmp / "manifest.csv"
        manifest.write_text(
            "original,suspect,label\n"
            f"{base},{forged},tampered\n"
            f"{base},{base},clean\n"
            f"{base},{tmp / 'missing.png'},clean\n"
        )
        run(cli, ["--quiet", "batch", str(manifest), "--output-dir", str(tmp / "ba")],
            {2}, td)  # exit 2: one row has a missing file
        validate("corpus_report.schema.json",
                 json.loads((tmp / "ba" / "corpus_report.json").read_text()),
                 "batch corpus_report.json")

    print("all JSON outputs validate")
    return 0


if __name__ == "__main__":
    sys.exit(main())
