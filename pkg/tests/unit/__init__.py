# Unit test package
