from _common import TASKS, cne_timing_task, convergence_task, max_min_task, reproduce_scenario, stiffness_task

SCENARIO = "example1"
SCENARIO_TASKS = {
    "spectrum": TASKS["spectrum"],
    "euler_threshold": TASKS["euler_threshold"],
    "stiffness_survey": stiffness_task(20),
    "max_min_principle": max_min_task([1e-3, 1e-1, 10.0, 1e3]),
    "convergence": convergence_task(10),
    "cne_timing": cne_timing_task(0.01),
    "compare": TASKS["compare"],
}

if __name__ == "__main__":
    reproduce_scenario(SCENARIO, SCENARIO_TASKS)
