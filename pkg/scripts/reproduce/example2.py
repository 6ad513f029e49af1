from _common import TASKS, cne_timing_task, convergence_task, max_min_task, reproduce_scenario, stiffness_task

SCENARIO = "example2"
# No Dormand-Prince comparison: its stable step on this mesh is ~1e-7 s over a 100 s span.
SCENARIO_TASKS = {
    "spectrum": TASKS["spectrum"],
    "euler_threshold": TASKS["euler_threshold"],
    "stiffness_survey": stiffness_task(10),
    "max_min_principle": max_min_task([1.0, 10.0]),
    "convergence": convergence_task(8),
    "cne_timing": cne_timing_task(1.0),
}

if __name__ == "__main__":
    reproduce_scenario(SCENARIO, SCENARIO_TASKS)
