# Source root package