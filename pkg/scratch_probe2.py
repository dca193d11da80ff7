import time

import numpy as np

from trackpolicy import data, inference, policy, sim

robot = sim.generate_demos("push", data.ROBOT, 10, "right", seed_start=0)
samples = [s for d in robot for s in data.chunk(d, 16)]
task = sim.make_task("push_right")
cams = sim.default_cameras()
stats = data.stats_for_camera(cams[0][0])


def sampled_track_quality(model, n_probe=40, seed=7):
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(samples), size=n_probe, replace=False)
    off_err, grasp_bad = [], 0
    for j, i in enumerate(idx):
        s = samples[i]
        kn = data.KeypointSet2D(s.keypoints_norm, data.ROBOT, 0)
        track = policy.sample(model, s.image, kn, seed=1000 + j)
        tgt = s.flat_target().reshape(16, 11)
        off_err.append(track.offsets.reshape(16, 10) - tgt[:, :10])
        grasp_bad += int(np.any((track.grasp_logits > 0) != (tgt[:, 10] > 0)))
    rmse = float(np.sqrt(np.mean(np.square(off_err))))
    return rmse, grasp_bad / n_probe


for lr, epochs in ((1e-3, 1000), (1e-3, 2000), (3e-4, 3000)):
    cfg = policy.TrainConfig(lambda_kl=0.0, lambda_da=0.0,
                             learning_rate=lr, epochs=epochs)
    t0 = time.time()
    curve = []
    model, log = policy.train([], robot, cfg,
                              log_fn=lambda e: curve.append((e["epoch"], e["mse"]))
                              if e["epoch"] % max(1, epochs // 5) == 0 else None)
    t_train = time.time() - t0
    rmse, gbad = sampled_track_quality(model)
    t0 = time.time()
    rate = inference.success_rate(model, task, range(10_000, 10_020))
    print(f"lr={lr} epochs={epochs}: train {t_train:.0f}s  "
          f"mse {[(e, round(m, 4)) for e, m in curve]} last {log[-1]['mse']:.4f}")
    print(f"    track rmse {rmse:.4f}  grasp-bad {gbad:.2f}  "
          f"success {rate:.2f}  (eval {time.time()-t0:.0f}s)")
