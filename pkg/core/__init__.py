"""BridgeShift: kernel bridge functions for domain adaptation under latent shift."""
