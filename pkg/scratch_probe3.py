import time

import numpy as np

from trackpolicy import data, inference, policy, sim

t0 = time.time()
robot = sim.generate_demos("push", data.ROBOT, 25, "right", seed_start=0)
human = sim.generate_demos("push", data.HUMAN, 60, "right", seed_start=100)
task = sim.make_task("push_right")
nR = sum(len(data.chunk(d, 16)) for d in robot)
nH = sum(len(data.chunk(d, 16)) for d in human)
print(f"gen {time.time()-t0:.0f}s  samples R={nR} H={nH}")

for epochs in (100, 200, 400):
    cfg = policy.TrainConfig(epochs=epochs)
    t0 = time.time()
    model, log = policy.train(human, robot, cfg)
    t_train = time.time() - t0
    t0 = time.time()
    rate = inference.success_rate(model, task, range(10_000, 10_020))
    print(f"cotrain epochs={epochs}: success {rate:.2f}  train {t_train:.0f}s "
          f"eval {time.time()-t0:.0f}s  mse_last {log[-1]['mse']:.4f} "
          f"kl_last {log[-1]['kl']:.4f} disc_acc_last {log[-1]['disc_accuracy']:.2f}")
