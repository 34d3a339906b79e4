import helper

assert helper.twice(4) == 8
