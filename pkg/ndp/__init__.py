# NDP module
