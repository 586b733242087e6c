import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'nadslab.settings')
django.setup()
