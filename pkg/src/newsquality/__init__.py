"""Visual SPAM filtering and news-quality ranking of social-media images."""

__version__ = "0.1.0"
