import time

import numpy as np

from trackpolicy import inference, sim

# --- criterion-5 protocol: oracle reach rollouts, 50 seeds, exactness ---
t0 = time.time()
task = sim.make_task("reach")
runner = inference.OracleRunner(horizon=16)
ok = 0
worst_step_err = 0.0
for seed in range(50):
    res = inference.rollout(runner, task, seed, exec_horizon=8)
    ok += res.success
    # reproduce expert trajectory for comparison
    state = sim.reset(task, seed)
    expert = [state]
    phase = 0
    while not sim.success(task, expert[-1]) and len(expert) - 1 < task.horizon:
        action, phase = sim.scripted_policy(task, expert[-1], phase)
        expert.append(sim.step(expert[-1], action))
    # re-run the oracle rollout manually to capture per-step EE poses
    state = sim.reset(task, seed)
    cams = sim.default_cameras()
    steps = 0
    errs = []
    while not sim.success(task, state) and steps < task.horizon:
        chunk = runner.chunk(task, state, cams, 0)
        for h in range(min(8, chunk.horizon)):
            local = inference.world_to_ee_delta(state.ee_pose, chunk.deltas[h])
            state = sim.step(state, sim.Action6DoF(local, int(chunk.grasps[h])))
            steps += 1
            if steps < len(expert):
                errs.append(np.linalg.norm(state.ee_pose.translation
                                           - expert[steps].ee_pose.translation))
            if sim.success(task, state):
                break
    worst_step_err = max(worst_step_err, max(errs) if errs else 0.0)
print(f"reach: {ok}/50 success, worst per-step EE error {worst_step_err:.3e} m, "
      f"{time.time()-t0:.1f}s")

# --- push oracle (closure crosses the rigid fit; resume_phase mid-grasp) ---
t0 = time.time()
for name in ("push_right", "push_left", "pick_place"):
    task = sim.make_task(name)
    results = [inference.rollout(runner, task, s, exec_horizon=8) for s in range(20)]
    rate = np.mean([r.success for r in results])
    res_max = max(r.max_residual for r in results)
    steps = [r.steps_used for r in results]
    print(f"{name}: success {rate:.2f}, max residual {res_max:.2e} px, "
          f"steps min/max {min(steps)}/{max(steps)}")
print(f"push/pick oracle: {time.time()-t0:.1f}s")
