from chainscale.application import ChainScale, load_settings, configure_logging
