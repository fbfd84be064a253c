"""The block-switching index process, alone and driving a flow.

Part 1 samples holding times from the learning-rate schedules and checks
them against the schedule's local scale (the mean holding time at time t is
the schedule value at t, up to the variation of the schedule over the hold).

Part 2 wires the process into a scalar two-block tug of war: block one pulls
the state toward +1, block two toward -1, and the process switches which
block is active.  With short holds the state hovers near the average of the
two targets (the full-data answer); with long holds it chases whichever
block happens to be active.

Run with:  python3 demos/02_jump_process.py
"""

import numpy as np

from subeki.dopri import IntegratorConfig, integrate
from subeki.flows import FlowSpec, build_subsampled
from subeki.index_process import (ConstantRate, ExponentialRate, advance,
                                  sample_waiting_time, start_process)
from subeki.problems import DataPartition, Ensemble, LinearProblem

rng = np.random.default_rng(7)

print("== holding times ==")
n = 20000
waits = np.array([sample_waiting_time(ConstantRate(0.25), 0.0, rng)
                  for _ in range(n)])
print(f"constant schedule, value 0.25:  mean hold {waits.mean():.4f} "
      f"(std/mean {waits.std() / waits.mean():.3f}; exponential gives 1)")

sched = ExponentialRate(0.05, b=0.5)   # value decays like 0.05 * exp(-0.5 t)
for t0 in (0.0, 4.0, 8.0):
    w = np.array([sample_waiting_time(sched, t0, rng) for _ in range(n)])
    print(f"decaying schedule at t = {t0:3.0f}:  value {sched.value(t0):7.4f}, "
          f"mean hold {w.mean():7.4f}  (switching accelerates)")

print("\n== visit statistics over five blocks ==")
state = start_process(ConstantRate(0.01), n_sub=5, mode="single", rng=rng)
state, events = advance(state, 200.0)
visits = np.bincount([e.new_index for e in events], minlength=5)
self_jumps = sum(1 for prev, e in zip([0] + [e.new_index for e in events],
                                      events) if prev == e.new_index)
print(f"{len(events)} switches; visits per block {visits.tolist()}; "
      f"self-switches {self_jumps}")

print("\n== tug of war: +1 block vs -1 block ==")
# A collapsed two-particle scalar ensemble makes the flow a plain gradient
# flow; a tiny regularization weight keeps the augmentation well posed
# without visibly moving the targets.
problem = LinearProblem(np.array([[1.0], [1.0]]), np.array([1.0, -1.0]),
                        np.eye(2))
sub = build_subsampled(problem, DataPartition((1, 1)), alpha=1e-6)
ens0 = Ensemble(np.zeros((1, 2)))
sample_times = np.linspace(0.0, 30.0, 301)
cfg = IntegratorConfig(dense_output_times=sample_times)


class Trace:
    def __init__(self):
        self.values = []

    def on_sample(self, t, theta):
        self.values.append(float(theta.mean()))


for label, hold in [("short holds (0.05)", 0.05), ("long holds (5.0)", 5.0)]:
    spec = FlowSpec("teki_vi", "single", sub, alpha_vi=1.0)
    state = start_process(ConstantRate(hold), n_sub=2, mode="single",
                          rng=np.random.default_rng(99))
    trace = Trace()
    res = integrate(spec, ens0, state, (0.0, 30.0), cfg, observers=(trace,))
    vals = np.array(trace.values)
    second_half = vals[sample_times >= 15.0]
    print(f"{label}: {res.n_jumps} switches, time-averaged state over "
          f"[15, 30] = {second_half.mean():+.3f}, "
          f"swing {second_half.min():+.2f} .. {second_half.max():+.2f}")

print("\nShort holds average the blocks out (state pinned near 0, the "
      "full-data\nanswer); long holds let the state run most of the way to "
      "whichever target\nis active.")
