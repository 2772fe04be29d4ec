# Ply partitioning package