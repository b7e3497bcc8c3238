"""circaforage: a day/night foraging grid world, a dueling recurrent
Q-learning agent trained from scratch on it, and the analysis protocols
that demonstrate and characterize the rhythm the agent internalizes."""

__version__ = "0.1.0"
