# Core numerics package