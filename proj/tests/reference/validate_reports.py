#!/usr/bin/env python3
"""Runs every appcap subcommand on synthesized fixtures and validates each
JSON report against schema/report.schema.json.

usage: validate_reports.py <appcap> <fixtures_dir> <schema>
Exits 77 when the jsonschema package is unavailable.
"""

import json
import pathlib
import subprocess
import sys
import tempfile

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed", file=sys.stderr)
    sys.exit(77)


def main():
    appcap, fixtures, schema_path = sys.argv[1], pathlib.Path(sys.argv[2]), sys.argv[3]
    schema = json.loads(pathlib.Path(schema_path).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)

        def run(*args):
            out = subprocess.run([appcap, *map(str, args)], capture_output=True, text=True)
            if out.returncode != 0:
                raise SystemExit(f"appcap {' '.join(map(str, args))} exited {out.returncode}: {out.stderr}")
            return json.loads(out.stdout)

        reports = {}
        for name in ("encryption_a", "encryption_b", "dns_a", "dns_b", "background"):
            reports[f"synth {name}"] = run("synth", fixtures / f"{name}.json", tmp / name)

        capture = sorted((tmp / "encryption_a").glob("*.pcap"))[0]
        keylog = capture.with_name(f"sslkeylog_{capture.stem}.txt")
        background = next((tmp / "background").glob("*.pcap"))
        # A stray file exercises the unparseable list.
        (tmp / "dns_a" / "notes.pcap").write_bytes(b"junk")

        reports["analyze"] = run("analyze", capture)
        reports["analyze keylog"] = run("analyze", capture, "--keylog", keylog, "--app-data-only", "--bins", "5")
        reports["analyze background"] = run("analyze", background)
        reports["keycov"] = run("keycov", capture, keylog)
        reports["baseline"] = run("baseline", background)
        reports["scan"] = run("dataset", "scan", tmp / "dns_a")
        reports["stats"] = run("dataset", "stats", tmp / "encryption_a")
        reports["stats truncated"] = run("dataset", "stats", tmp / "dns_b", "--truncate-min", "2")
        reports["compare"] = run("compare", tmp / "encryption_a", tmp / "encryption_b")
        reports["compare dns"] = run("compare", tmp / "dns_a", tmp / "dns_b", "--all-packets", "--common-only",
                                     "--truncate-min", "3")

        failed = 0
        for name, report in reports.items():
            errors = sorted(validator.iter_errors(report), key=lambda e: list(e.path))
            for e in errors[:5]:
                print(f"{name}: {'/'.join(map(str, e.path))}: {e.message}")
            failed += bool(errors)
            print(f"{'ok  ' if not errors else 'FAIL'} {name}")
        return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
