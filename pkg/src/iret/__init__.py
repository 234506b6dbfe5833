"""Interactive retrieval testbed: language-model search engine inside an
MDP dialogue manager, with a DQN policy, baselines, and an oracle."""

__version__ = "0.1.0"
