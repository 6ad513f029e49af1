from datetime import datetime, timezone
from pathlib import Path

import example1
import example2
from _common import REPORTS_DIR, reproduce_scenario
from core.reports import write_json

SCRIPTS = [example1, example2]


def main() -> None:
    run_report: dict[str, object] = {
        "run_started_at": datetime.now(timezone.utc).isoformat(),
        "totals": {"scenarios": 0, "ok_tasks": 0, "error_tasks": 0},
        "scenarios": [],
    }

    for index, script in enumerate(SCRIPTS, start=1):
        print(f"[{index}] {script.SCENARIO}")
        summary = reproduce_scenario(script.SCENARIO, script.SCENARIO_TASKS)
        run_report["totals"]["scenarios"] += 1
        run_report["totals"]["ok_tasks"] += summary["totals"]["ok"]
        run_report["totals"]["error_tasks"] += summary["totals"]["error"]
        run_report["scenarios"].append(
            {"scenario": script.SCENARIO, "totals": summary["totals"], "errors": summary["errors"]}
        )

    run_report["run_finished_at"] = datetime.now(timezone.utc).isoformat()
    run_id = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    run_path = Path(REPORTS_DIR) / "_runs" / f"run_all_{run_id}.json"
    write_json(run_path, run_report)

    print(f"Completed {len(SCRIPTS)} scenarios.")
    print(f"Run report: {run_path}")


if __name__ == "__main__":
    main()
