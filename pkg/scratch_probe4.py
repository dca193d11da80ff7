import time

import numpy as np

from trackpolicy import data, inference, policy, sim

robot = sim.generate_demos("push", data.ROBOT, 25, "right", seed_start=0)
human = sim.generate_demos("push", data.HUMAN, 60, "right", seed_start=100)
task = sim.make_task("push_right")

for label, kl_w, da_w in (("pooled", 0.0, 0.0), ("aligned", 1.0, 0.3)):
    cfg = policy.TrainConfig(lambda_kl=kl_w, lambda_da=da_w, epochs=200)
    curve = []
    t0 = time.time()
    model, log = policy.train(human, robot, cfg,
                              log_fn=lambda e: curve.append(e) if e["epoch"] % 50 == 0 else None)
    t_train = time.time() - t0
    rate = inference.success_rate(model, task, range(10_000, 10_020))
    for e in curve:
        msg = f"  ep{e['epoch']}: mse {e['mse']:.4f}"
        if e["kl"] is not None:
            msg += f" kl {e['kl']:.2f} da {e['da']:.3f} disc_acc {e['disc_accuracy']:.2f}"
        print(msg)
    print(f"{label}: success {rate:.2f}  train {t_train:.0f}s  mse_last {log[-1]['mse']:.4f}")
