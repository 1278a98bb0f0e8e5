# Tests package for finr
