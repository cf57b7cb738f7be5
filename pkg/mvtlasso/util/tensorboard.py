from tensorboardX import SummaryWriter

class TensorBoardHook(SummaryWriter):
    """
    SummaryWriter that stamps every scalar with the current EM iteration.

    A periodicity of 0 disables all writes; histograms are written every periodicity iterations.
    """
    def __init__(self, periodicity, *argv, **kargv):
        self.periodicity = periodicity
        self._step = -1
        if periodicity != 0:
            super().__init__(*argv, **kargv)

    def stepNext(self):
        self._step += 1

    def stepReset(self, step=None):
        if step is not None:
            self._step = step

    def add_scalar(self, label, value):
        if self.periodicity == 0:
            return
        super().add_scalar(label, float(value), self._step)

    def add_histogram(self, label, values):
        if self.periodicity == 0 or self._step % self.periodicity != 0:
            return
        super().add_histogram(label, values, self._step)

    def close(self):
        if self.periodicity != 0:
            super().close()

nullTensorBoardHook = TensorBoardHook(0)
