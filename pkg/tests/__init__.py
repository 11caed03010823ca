"""Test package for the WhatsApp Digest System."""
