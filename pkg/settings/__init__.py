# Package initialization file
from .environment import get_settings, Settings

__all__ = ['get_settings', 'Settings']
