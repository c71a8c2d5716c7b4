import sys
from banditbias.cli import main

sys.exit(main())
