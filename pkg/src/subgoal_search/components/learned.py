"""Learned policy, value and verifier built on hashed linear models."""

from __future__ import annotations

import numpy as np

from .features import featurizers
from .linear import LinearModel, LinearParams, train_linear_model


class LearnedPolicy:
    """Argmax of a multiclass linear model, masked to legal actions.

    If a Sokoban state has no legal action at all, action 0 is returned; the
    rollout then fails on the legality check.
    """

    def __init__(self, linear: LinearModel, model):
        self.linear = linear
        self.model = model
        self._pair = featurizers(model.name)[1]

    def scores(self, state, goal) -> np.ndarray:
        return self.linear.raw(self._pair(state, goal))

    def predict(self, state, goal) -> int:
        z = self.scores(state, goal)
        legal = self.model.legal_actions(state)
        if not legal:
            return 0
        best = legal[0]
        for a in legal:
            if z[a] > z[best]:
                best = a
        return int(best)


class LearnedValue:
    def __init__(self, linear: LinearModel, model):
        self.linear = linear
        self.model = model
        self._state = featurizers(model.name)[0]

    def value(self, state) -> float:
        return self.linear.predict(self._state(state))


class LearnedVerifier:
    def __init__(self, linear: LinearModel, model):
        self.linear = linear
        self.model = model
        self._pair = featurizers(model.name)[1]

    def score(self, state, candidate) -> float:
        return self.linear.predict(self._pair(state, candidate))


def train_policy(samples, model, params: LinearParams | None = None) -> LearnedPolicy:
    pair = featurizers(model.name)[1]
    data = [(pair(s, g), a) for (s, g), a in samples]
    return LearnedPolicy(train_linear_model(data, "multiclass", params, n_classes=len(model.action_names)), model)


def train_value(samples, model, params: LinearParams | None = None) -> LearnedValue:
    feat = featurizers(model.name)[0]
    data = [(feat(s), t) for s, t in samples]
    return LearnedValue(train_linear_model(data, "regression", params), model)


def train_verifier(samples, model, params: LinearParams | None = None) -> LearnedVerifier:
    """``samples`` are ``VerifierSample`` records (start, candidate, label)."""
    pair = featurizers(model.name)[1]
    data = [(pair(s.start, s.candidate), 1.0 if s.label else 0.0) for s in samples]
    return LearnedVerifier(train_linear_model(data, "logistic", params), model)
