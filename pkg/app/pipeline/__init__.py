# Orchestration, artifact store and report emission
