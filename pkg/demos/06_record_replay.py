"""Recording and deterministic replay.

Every inbound wire message can be recorded verbatim and replayed in
virtual time: the engine contains no wall clock or hidden randomness, so
two replays of the same file with the same seed produce bit-identical
reports. This grounds regression testing and makes operator sessions a
data product.

Equivalent CLI:
    engine run --replay session.jsonl --scenario peg_in_hole --seed 42
    engine calibrate-check session.jsonl
    engine report trajectory.jsonl
"""

import io
import json
import tempfile
from pathlib import Path

from handteleop.session import SessionConfig, run_replay
from handteleop.synthetic import scripted_session_lines


def main():
    workdir = Path(tempfile.mkdtemp(prefix="handteleop_demo_"))
    session_file = workdir / "session.jsonl"
    lines = scripted_session_lines(duration_s=60.0, seed=42)
    session_file.write_text("\n".join(lines) + "\n")
    print(f"wrote a scripted 60 s session: {session_file} ({len(lines)} messages)")

    reports = []
    for run in (1, 2):
        buf = io.StringIO()
        cfg = SessionConfig(
            replay=str(session_file),
            scenario="peg_in_hole",
            seed=42,
            log_path=str(workdir / f"trajectory_{run}.jsonl"),
        )
        run_replay(cfg, out=buf)
        reports.append(buf.getvalue())
        print(f"replay #{run}: {len(reports[-1])} report bytes")

    identical = reports[0] == reports[1]
    print(f"reports bit-identical: {identical}")
    report = json.loads(reports[0])
    print(json.dumps(report, indent=2))

    logs = [
        (workdir / f"trajectory_{run}.jsonl").read_bytes() for run in (1, 2)
    ]
    print(f"trajectory logs bit-identical: {logs[0] == logs[1]} "
          f"({len(logs[0])} bytes)")


if __name__ == "__main__":
    main()
