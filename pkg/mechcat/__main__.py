from mechcat.cli.main import main

raise SystemExit(main())
