"""Complex-valued residual networks trained by explicit back-propagation."""
