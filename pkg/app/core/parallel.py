from joblib import Parallel, delayed

from app.config import settings


def map_ordered(func, tareas, n_jobs: int | None = None) -> list:
    """Aplica `func` a cada tarea en hilos; el resultado respeta el orden de entrada."""
    tareas = list(tareas)
    n_jobs = n_jobs or settings.THREADS
    if n_jobs == 1 or len(tareas) <= 1:
        return [func(t) for t in tareas]
    return Parallel(n_jobs=min(n_jobs, len(tareas)), prefer="threads")(
        delayed(func)(t) for t in tareas
    )
