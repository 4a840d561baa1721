"""Construction of (network, aperture bank) pairs from configuration."""

from spckd.models.config import ExperimentConfig, Role
from spckd.recovery.network import RecoveryNet
from spckd.sensing.aperture import CodedApertureBank, build_sensing


def build_system(config: ExperimentConfig) -> tuple[RecoveryNet, CodedApertureBank]:
    """Fresh, seeded recovery network and aperture bank for ``config``.

    The ``random-ca`` role always gets a frozen aperture.
    """
    s = config.sensing
    bank = build_sensing(
        gamma=s.gamma,
        height=s.height,
        width=s.width,
        bands=s.bands,
        mode=s.mode,
        seed=config.aperture_seed,
        init=s.init,
        trainable=s.trainable and config.train.role != Role.RANDOM_CA,
        dtype=config.dtype,
    )
    net = RecoveryNet(
        bank.shape,
        stages=config.stages,
        prox=config.prox,
        seed=config.network_seed,
        dtype=config.dtype,
    )
    return net, bank
