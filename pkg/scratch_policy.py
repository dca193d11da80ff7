import time

import numpy as np

from trackpolicy import data, inference, policy, sim
from trackpolicy.nn import Adam

# ---------------------------------------------------------------- A: overfit
# "10-sample overfit set", 200 steps. The set fixes the noising too: same rng
# state per call -> fixed (x_t, t) -> eps regression, memorizable.
demo = sim.scripted_demo(sim.make_task("push_right"), sim.robot_embodiment(), 0)
samples = data.chunk(demo, 16)[:10]
for lr in (1e-3, 3e-3, 1e-2):
    cfg = policy.TrainConfig(lambda_kl=0.0, lambda_da=0.0, learning_rate=lr)
    model = policy.build_model(cfg, int(samples[0].image.size))
    opt = Adam(cfg.learning_rate)
    t0 = time.time()
    for step in range(200):
        rep = policy.train_step(model, samples, model.schedule, cfg,
                                np.random.default_rng(0), opt)
    print(f"A fixed-noise overfit lr={lr}: final mse {rep.mse:.6f}  ({time.time()-t0:.1f}s)")

# ---------------------------------------------------------- B: static demo
state = sim.reset(sim.make_task("push_right"), 3)
cams = sim.default_cameras()
emb = sim.robot_embodiment()
views = []
for v, cam in enumerate(cams):
    img, kps, grasp = sim.observe(state, cam, emb, view_id=v)
    views.append(data.FrameView(img, kps, grasp))
static = data.Demonstration(data.ROBOT, tuple([tuple(views)] * 12), "push_right",
                            3, cams, tuple([state.ee_pose] * 12))
for epochs in (100, 300, 1000):
    cfg = policy.TrainConfig(lambda_kl=0.0, lambda_da=0.0, epochs=epochs)
    t0 = time.time()
    model, log = policy.train([], [static], cfg)
    stats = data.stats_for_camera(cams[0][0])
    worst = 0.0
    for seed in range(4):
        kn = data.KeypointSet2D(stats.normalize(views[0].keypoints.points), data.ROBOT, 0)
        track = policy.sample(model, views[0].image, kn, seed=seed)
        worst = max(worst, float(np.abs(track.offsets).max()))
        glr = (track.grasp_logits.min(), track.grasp_logits.max())
    print(f"B static epochs={epochs}: max|offset| {worst:.4f}  "
          f"grasp logits [{glr[0]:.2f},{glr[1]:.2f}]  mse_last {log[-1]['mse']:.4f}  "
          f"({time.time()-t0:.1f}s)")

# ------------------------------------------------------------- C: pilot push
t0 = time.time()
robot = sim.generate_demos("push", data.ROBOT, 10, "right", seed_start=0)
human = sim.generate_demos("push", data.HUMAN, 20, "right", seed_start=100)
print(f"C gen: {time.time()-t0:.1f}s  (robot lens {[d.length for d in robot[:3]]})")
task = sim.make_task("push_right")
for epochs in (40, 120):
    cfg = policy.TrainConfig(epochs=epochs)
    t0 = time.time()
    model, log = policy.train(human, robot, cfg)
    t_train = time.time() - t0
    t0 = time.time()
    rate = inference.success_rate(model, task, range(10_000, 10_010))
    print(f"C pilot epochs={epochs}: success {rate:.2f}  "
          f"train {t_train:.0f}s eval {time.time()-t0:.0f}s  "
          f"mse first/last {log[0]['mse']:.3f}/{log[-1]['mse']:.3f}")
