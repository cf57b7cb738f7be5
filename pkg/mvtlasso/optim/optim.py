import math

import torch

class Optimizer(object):
    """ The Optimizer class runs monotone line-search steps for an unmixing matrix of the form
    W = B * Q * diag(exp(u)), where B is a fixed invertible basis, Q is orthogonal and u holds
    log scales. Q moves along the Riemannian gradient and is pulled back to the orthogonal
    group by a polar retraction; u moves along its gradient and is clipped to bounds.

    Args:
        objective (callable): maps (Q, u) torch tensors to a scalar torch tensor to minimize.
        Q (torch.Tensor): orthogonal n x n starting point.
        u (torch.Tensor): log scales, length n.
        step (float, optional): initial step size (default 1.0).
        max_grad_norm (float, optional): value used for gradient norm clipping,
            set 0 to disable (default 0)
        log_bounds (tuple, optional): bounds on u (default log(1e-6), log(1e6)).
        max_backtracks (int, optional): step halvings before a step is declared failed.
        armijo (float, optional): sufficient decrease constant.
    """

    _ARG_MAX_GRAD_NORM = 'max_grad_norm'

    def __init__(self, objective, Q, u, step=1.0, max_grad_norm=0,
                 log_bounds=(math.log(1e-6), math.log(1e6)), max_backtracks=30, armijo=1e-4):
        self.objective = objective
        self.Q = Q.detach().clone()
        self.u = torch.clamp(u.detach().clone(), *log_bounds)
        self.initial_step = step
        self.step_size = step
        self.max_grad_norm = max_grad_norm
        self.log_bounds = log_bounds
        self.max_backtracks = max_backtracks
        self.armijo = armijo
        self._value = None
        self._grads = None

    def value(self):
        if self._value is None:
            with torch.no_grad():
                self._value = float(self.objective(self.Q, self.u))
        return self._value

    def gradients(self):
        """ Riemannian gradient in Q and plain gradient in u at the current point. """
        if self._grads is None:
            Q = self.Q.clone().requires_grad_(True)
            u = self.u.clone().requires_grad_(True)
            loss = self.objective(Q, u)
            gradQ, gradU = torch.autograd.grad(loss, (Q, u))
            QtG = self.Q.T @ gradQ
            riemannianQ = gradQ - self.Q @ ((QtG + QtG.T) / 2.0)

            # No descent direction pushes u outside its box.
            low, high = self.log_bounds
            pinned = ((self.u <= low) & (gradU > 0)) | ((self.u >= high) & (gradU < 0))
            gradU = torch.where(pinned, torch.zeros_like(gradU), gradU)

            if self.max_grad_norm > 0:
                norm = torch.sqrt(torch.sum(riemannianQ ** 2) + torch.sum(gradU ** 2))
                if norm > self.max_grad_norm:
                    riemannianQ = riemannianQ * (self.max_grad_norm / norm)
                    gradU = gradU * (self.max_grad_norm / norm)
            self._value = float(loss.detach())
            self._grads = (riemannianQ.detach(), gradU.detach())
        return self._grads

    def gradient_norm(self):
        gradQ, gradU = self.gradients()
        return float(torch.sqrt(torch.sum(gradQ ** 2) + torch.sum(gradU ** 2)))

    @staticmethod
    def retract(M):
        """ Polar retraction: the orthogonal factor of M. """
        U, _, Vh = torch.linalg.svd(M)
        return U @ Vh

    def step(self):
        """ Performs one backtracking step. Returns True if a sufficient decrease was found. """
        gradQ, gradU = self.gradients()
        current = self.value()
        squaredNorm = float(torch.sum(gradQ ** 2) + torch.sum(gradU ** 2))
        eta = self.step_size
        for _ in range(self.max_backtracks):
            with torch.no_grad():
                candidateQ = self.retract(self.Q - eta * gradQ)
                candidateU = torch.clamp(self.u - eta * gradU, *self.log_bounds)
                candidate = float(self.objective(candidateQ, candidateU))
            if math.isfinite(candidate) and candidate <= current - self.armijo * eta * squaredNorm:
                self.Q, self.u = candidateQ, candidateU
                self._value, self._grads = candidate, None
                self.update(eta, True)
                return True
            eta /= 2.0
        self.update(eta, False)
        return False

    def update(self, eta, accepted):
        """ Step size schedule: grow after an accepted step, keep the reduced size otherwise. """
        if accepted:
            self.step_size = min(2.0 * eta, 1e3 * self.initial_step)
        else:
            self.step_size = max(eta, 1e-12)
