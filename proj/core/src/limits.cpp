namespace sjohn {}
