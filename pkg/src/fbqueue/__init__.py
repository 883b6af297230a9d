"""Maximum queue length in M/G/1 busy periods under Foreground-Background scheduling.

``fbqueue.dist``       service-time laws with log-convex densities
``fbqueue.analytics``  exceedance bounds and buffer-overflow time estimates
``fbqueue.sim``        seeded discrete-event simulator (FB, FB*, FIFO)
``fbqueue.cli``        command-line front end
"""

__version__ = "0.1.0"
