"""Cognitive-architecture toolkit.

Subpackages cover holographic vector algebra (:mod:`cogkit.hrr`), working and
declarative memory stores (:mod:`cogkit.memory`), generative-coding circuits
(:mod:`cogkit.ngc`), competitive gating (:mod:`cogkit.gate`), a reinforcement
motor head (:mod:`cogkit.motor`), the integrated agent (:mod:`cogkit.agent`),
and the dataset/environment/run harness (:mod:`cogkit.data`,
:mod:`cogkit.envs`, :mod:`cogkit.runner`).
"""

__version__ = "0.1.0"
