#!/usr/bin/env python3
"""Regenerate tests/fixtures/golden_states.ndjson.

Runs the offline guidance pipeline over the seeded fixture scenario and
writes one state record per frame. The live TCP server must emit
byte-identical records for the same scenario, which is what the
acceptance suite checks against this file.
"""

from pathlib import Path

from fidunav.server import run_pipeline, state_record
from fidunav.simulator import load_scenario, simulate

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"


def main() -> None:
    scenario = load_scenario((FIXTURES / "fixture_scenario.yaml").read_text())
    lines = [
        state_record(state)
        for state in run_pipeline(simulate(scenario), scenario.rig)
    ]
    out = FIXTURES / "golden_states.ndjson"
    out.write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines)} records to {out}")


if __name__ == "__main__":
    main()
