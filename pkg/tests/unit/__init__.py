"""Unit tests for the WhatsApp Digest System."""
