"""quadtrack command line: gradients, build, track and the study commands."""
