"""Array geometry, snapshot simulation and covariance processing."""
