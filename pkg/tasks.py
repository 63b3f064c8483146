from bginvoketasks import *
