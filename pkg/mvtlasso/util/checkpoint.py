import os, shutil, json

import numpy as np

from ..core.types import ModelState, ViewParams

class Checkpoint(object):
    """
    Saves and restores a fitted model together with its EM traces.

    A checkpoint is a folder holding the arrays in ARRAYS_NAME and everything else in
    STATE_NAME, so a run can be inspected without loading the numeric payload.

    Args:
        model (ModelState): fitted parameters.
        view_ids (list): view identifiers in the order of model.views.
        gene_ids (list): gene identifiers along the axis of Theta.
        traces (dict): EM diagnostics (q_trace, loglik_trace, converged, iterations...).
    """
    STATE_NAME = 'state.json'
    ARRAYS_NAME = 'arrays.npz'

    def __init__(self, model, view_ids, gene_ids, traces=None):
        self.model = model
        self.view_ids = list(view_ids)
        self.gene_ids = list(gene_ids)
        self.traces = dict(traces or {})
        self._path = None

    @property
    def path(self):
        if self._path is None:
            raise LookupError("The checkpoint has not been saved.")
        return self._path

    def save(self, path):
        self._path = path

        if os.path.exists(path):
            shutil.rmtree(path)
        os.makedirs(path)

        arrays = {"Theta": self.model.Theta}
        for d, params in enumerate(self.model.views):
            arrays["W_{0}".format(d)] = params.W
            arrays["mu_{0}".format(d)] = params.mu
        np.savez(os.path.join(path, self.ARRAYS_NAME), **arrays)

        state = {
            "nu": self.model.nu,
            "lam": self.model.lam,
            "view_ids": self.view_ids,
            "gene_ids": self.gene_ids,
            "sigma": [params.sigma for params in self.model.views],
            "k": [params.k for params in self.model.views],
            "traces": self.traces,
        }
        with open(os.path.join(path, self.STATE_NAME), 'w') as fout:
            json.dump(state, fout, indent=2)

        return path

    @classmethod
    def load(cls, path):
        with open(os.path.join(path, cls.STATE_NAME), 'r') as fin:
            state = json.load(fin)
        with np.load(os.path.join(path, cls.ARRAYS_NAME)) as arrays:
            views = [
                ViewParams(arrays["W_{0}".format(d)], arrays["mu_{0}".format(d)], sigma, k)
                for d, (sigma, k) in enumerate(zip(state["sigma"], state["k"]))
            ]
            model = ModelState.create(views, arrays["Theta"], state["nu"], state["lam"])

        checkpoint = Checkpoint(model, state["view_ids"], state["gene_ids"], state.get("traces"))
        checkpoint._path = path
        return checkpoint

    @classmethod
    def fromReport(cls, report, views):
        """ Checkpoint of a FitReport fitted on views. """
        traces = {
            "q_trace": [float(v) for v in report.q_trace],
            "q_gain_trace": [float(v) for v in report.q_gain_trace],
            "loglik_trace": [float(v) for v in report.loglik_trace],
            "w_success": [bool(v) for v in report.w_success],
            "converged": bool(report.converged),
            "iterations": int(report.iterations),
        }
        return cls(report.model, [v.view_id for v in views], views[0].gene_ids, traces)
