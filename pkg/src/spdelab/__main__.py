from spdelab.cli import main

raise SystemExit(main())
