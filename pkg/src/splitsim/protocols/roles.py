"""Client and server halves of a split model."""
from __future__ import annotations

from ..errors import ProtocolError
from ..nn.losses import loss_and_grad
from ..nn.model import ForwardCache, ModelSpec, Parameters, backward, forward
from .messages import SmashedBatch, SmashedGrad


class SplitClient:
    """Runs the client prefix and remembers caches until gradients return."""

    def __init__(self, cid: int, spec: ModelSpec, params: Parameters):
        self.cid = cid
        self.spec = spec
        self.params = params
        self._pending: dict[tuple[int, int], ForwardCache] = {}

    def smash(self, x, labels, seq: tuple[int, int]) -> SmashedBatch:
        activations, cache = forward(self.spec, self.params, x, "train")
        self._pending[seq] = cache
        return SmashedBatch(activations, labels, self.cid, seq)

    def receive(self, msg: SmashedGrad):
        if msg.client != self.cid:
            raise ProtocolError(f"client {self.cid} got gradients addressed to client {msg.client}")
        cache = self._pending.pop(msg.seq, None)
        if cache is None:
            raise ProtocolError(f"client {self.cid} has no pending batch {msg.seq}")
        _, grads = backward(self.spec, self.params, cache, msg.grad, need_input_grad=False)
        return grads


def serve(spec: ModelSpec, params: Parameters, batch: SmashedBatch):
    """Server half of one step: forward, loss, backward. Returns
    ``(loss, SmashedGrad, server gradients)``; no update is applied."""
    logits, cache = forward(spec, params, batch.activations, "train")
    loss, dlogits = loss_and_grad(spec.loss, logits, batch.labels)
    dx, grads = backward(spec, params, cache, dlogits)
    return loss, SmashedGrad(dx, batch.client, batch.seq), grads
