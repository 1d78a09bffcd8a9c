# Tests for wsnsim
