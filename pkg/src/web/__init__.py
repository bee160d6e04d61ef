"""
Web interface for browsing ClipForge run artifacts
"""

from .app import create_app

__all__ = ["create_app"]
