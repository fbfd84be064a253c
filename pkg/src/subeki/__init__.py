"""Continuous-time ensemble Kalman inversion with randomized data subsampling.

The package solves linear inverse problems ``y = A theta + noise`` by evolving
an ensemble of particles along a preconditioned gradient flow.  The data may
be split into blocks, with the active block switched by a continuous-time
Markov index process whose holding times follow a learning-rate schedule.

Modules
-------
problems        linear problem container, partitions, ensembles, whitening
tikhonov        least-squares augmentation implementing Tikhonov regularization
index_process   learning-rate schedules and the jump process over data blocks
flows           right-hand sides of the ensemble flows (plain / regularized / inflated)
dopri           embedded Runge-Kutta 4(5) integrator with jump-aligned restarts
heat            1D heat-equation source-identification forward model
reference       ensemble-subspace frames and constrained Tikhonov minimizers
diagnostics     trajectory records, error metrics, aggregation
runner          experiment configs, presets, campaign driver
cli             command-line entry point
"""

__version__ = "0.1.0"
