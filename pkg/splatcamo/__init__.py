# -*- coding: utf-8 -*-
__copyright__ = "Copyright (c) 2026 splat-camo contributors"

__version__ = "0.3.0"
