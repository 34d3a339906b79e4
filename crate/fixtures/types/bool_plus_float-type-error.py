x = True + 3.0
