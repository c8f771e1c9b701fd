"""One-step maps: Runge-Kutta, Lie splitting and composition."""
