from ...errors import FrozenModelError


class FrozenModels:
    """Records parameter hashes of networks that must not change.

    Gradients may flow through a frozen network; only updates are forbidden.
    Use as a context manager to verify on exit.
    """

    def __init__(self, **networks):
        self.networks = networks
        self.hashes = {name: net.parameter_hash() for name, net in networks.items()}

    def changed(self):
        return [name for name, net in self.networks.items() if net.parameter_hash() != self.hashes[name]]

    def verify(self):
        changed = self.changed()
        if changed:
            raise FrozenModelError(f"frozen networks were modified: {', '.join(changed)}")

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.verify()
        return False


def freeze(**networks):
    return FrozenModels(**networks)
