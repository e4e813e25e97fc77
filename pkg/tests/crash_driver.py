"""Child process for the crash-safety tests.

Runs one loop step against an existing project with TREEBENCH_FAILPOINT set
by the parent; the failpoint calls os._exit(42) mid-step, simulating a kill.

    crash_driver.py PROJECT_DIR STEP [BATCH_INDEX]

STEP is next-batch | finalize | finetune. finalize expects the draft to have
been prepared by the parent already.
"""

import sys

from treebench import loop


def main() -> int:
    project_dir, step = sys.argv[1], sys.argv[2]
    batch_index = int(sys.argv[3]) if len(sys.argv) > 3 else 0
    project = loop.Project.load(project_dir)
    if step == "next-batch":
        project.next_batch()
    elif step == "finalize":
        project.finalize_batch(batch_index)
    elif step == "finetune":
        project.finetune_step(batch_index)
    else:
        raise SystemExit(f"unknown step {step!r}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
