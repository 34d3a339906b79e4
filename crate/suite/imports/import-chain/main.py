import mid

assert mid.triple_inc(3) == 12
