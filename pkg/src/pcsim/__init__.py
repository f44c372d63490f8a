"""Closed-loop simulator of on-chip power and thermal management for many-core CPUs.

The package couples a thermal/power/performance plant model to reactive
power-control policies (a two-layer frequency/voltage control firmware and an
industry-style voting-box baseline) through a simulated mailbox transport, and
ships a harness that runs the loop deterministically (lockstep) or free-running
(async) and scores control quality.
"""

__version__ = "0.1.0"
