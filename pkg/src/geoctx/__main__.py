from geoctx.cli import main

raise SystemExit(main())
